//! Extremal families: stars, balls, the non-trivial families for
//! `k >= t + 3`, and the small families that occur when `k = t + 2`.
//!
//! A family is described by a [`Rule`] (its membership predicate). Rules can
//! be realised against a [`PartitionUniverse`] to obtain an id-set, or used
//! intensionally when the universe is too large to enumerate.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{f1, f2, n_class_counts, theta};
use crate::error::{Error, Result};
use crate::partition::{Block, PartialPartition, Params, UniformPartition};
use crate::universe::{IdSet, PartitionUniverse};

/// Membership predicate of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Members containing every block of the anchor.
    Contains(PartialPartition),
    /// Members sharing at least `min` blocks with the anchor.
    AtLeast { anchor: PartialPartition, min: usize },
    /// Members that contain `core` and share more than `|core|` blocks with
    /// `left`, or miss `core` and share exactly `k - 2` blocks with `right`.
    Split { core: PartialPartition, left: PartialPartition, right: PartialPartition },
    /// Members containing at least one of the anchors.
    ContainsAny(Vec<PartialPartition>),
    /// An explicit member list.
    Listed(Vec<UniformPartition>),
}

impl Rule {
    pub fn contains(&self, p: &PartialPartition) -> bool {
        match self {
            Rule::Contains(anchor) => anchor.is_subset_of(p),
            Rule::AtLeast { anchor, min } => anchor.shared_blocks(p) >= *min,
            Rule::Split { core, left, right } => {
                if core.is_subset_of(p) {
                    left.shared_blocks(p) > core.len()
                } else {
                    right.shared_blocks(p) + 2 == p.params().k
                }
            }
            Rule::ContainsAny(anchors) => anchors.iter().any(|a| a.is_subset_of(p)),
            Rule::Listed(items) => items.iter().any(|m| m.as_partial() == p),
        }
    }

    /// Draws a member. Not uniform; deterministic for a given RNG state.
    pub fn sample<R: Rng>(&self, params: Params, rng: &mut R) -> Result<UniformPartition> {
        for _ in 0..256 {
            let candidate = match self {
                Rule::Contains(anchor) => complete(anchor, rng)?,
                Rule::AtLeast { anchor, min } => {
                    let chosen: Vec<Block> = anchor.blocks().choose_multiple(rng, *min).copied().collect();
                    complete(&PartialPartition::new(params, chosen)?, rng)?
                }
                Rule::Split { core, left, right } => sample_split(params, core, left, right, rng)?,
                Rule::ContainsAny(anchors) => {
                    let anchor = anchors.choose(rng).ok_or(Error::EmptyFamily)?;
                    complete(anchor, rng)?
                }
                Rule::Listed(items) => items.choose(rng).ok_or(Error::EmptyFamily)?.clone(),
            };
            if self.contains(&candidate) {
                return Ok(candidate);
            }
        }
        Err(Error::InfeasibleConstruction("sampler found no member".into()))
    }
}

fn sample_split<R: Rng>(
    params: Params,
    core: &PartialPartition,
    left: &PartialPartition,
    right: &PartialPartition,
    rng: &mut R,
) -> Result<UniformPartition> {
    if rng.gen_bool(0.5) {
        let extra: Vec<Block> = left.difference(core).blocks().to_vec();
        let pick = *extra.choose(rng).ok_or_else(|| Error::InvalidAnchors("left adds nothing to core".into()))?;
        return complete(&core.with_block(pick)?, rng);
    }
    let dropped = *core.blocks().choose(rng).ok_or_else(|| Error::InvalidAnchors("empty core".into()))?;
    let kept: Vec<Block> = right.blocks().iter().copied().filter(|b| *b != dropped).collect();
    let kept = PartialPartition::new(params, kept)?;
    let mut p = complete(&kept, rng)?;
    for _ in 0..64 {
        if !p.contains_block(dropped) {
            break;
        }
        p = complete(&kept, rng)?;
    }
    Ok(p)
}

/// Fills the uncovered ground set with random blocks.
pub fn complete<R: Rng>(partial: &PartialPartition, rng: &mut R) -> Result<UniformPartition> {
    let params = partial.params();
    let free = params.ground_mask() & !partial.support();
    let mut rest: Vec<usize> = (0..params.n()).filter(|&i| free >> i & 1 == 1).collect();
    rest.shuffle(rng);
    let mut blocks = partial.blocks().to_vec();
    for chunk in rest.chunks(params.c) {
        blocks.push(Block::from_elements(chunk)?);
    }
    UniformPartition::new(params, blocks)
}

/// How big a family is, when that is known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySize {
    Counted(usize),
    Formula(BigInt),
    Unknown,
}

impl fmt::Display for FamilySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySize::Counted(n) => write!(f, "{n}"),
            FamilySize::Formula(v) => write!(f, "{v}"),
            FamilySize::Unknown => f.write_str("unknown"),
        }
    }
}

/// A family of uniform partitions: an id-set over an enumerated universe, or
/// a membership rule.
#[derive(Clone, Debug)]
pub enum Family {
    Extensional { universe: Arc<PartitionUniverse>, ids: IdSet },
    Intensional { params: Params, rule: Rule, size: Option<BigInt> },
}

impl Family {
    pub fn realize(universe: &Arc<PartitionUniverse>, rule: &Rule) -> Self {
        let ids = match rule {
            Rule::Contains(anchor) => universe.enumerate_containing(anchor).expect("params checked by spec"),
            _ => universe.id_set(
                universe.items().iter().enumerate().filter(|(_, p)| rule.contains(p)).map(|(i, _)| i),
            ),
        };
        Family::Extensional { universe: Arc::clone(universe), ids }
    }

    pub fn from_ids(universe: &Arc<PartitionUniverse>, ids: IdSet) -> Self {
        Family::Extensional { universe: Arc::clone(universe), ids }
    }

    pub fn params(&self) -> Params {
        match self {
            Family::Extensional { universe, .. } => universe.params(),
            Family::Intensional { params, .. } => *params,
        }
    }

    pub fn size(&self) -> FamilySize {
        match self {
            Family::Extensional { ids, .. } => FamilySize::Counted(ids.count_ones(..)),
            Family::Intensional { size: Some(v), .. } => FamilySize::Formula(v.clone()),
            Family::Intensional { .. } => FamilySize::Unknown,
        }
    }

    /// Member count of an extensional family.
    pub fn len(&self) -> Option<usize> {
        match self {
            Family::Extensional { ids, .. } => Some(ids.count_ones(..)),
            Family::Intensional { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn ids(&self) -> Option<&IdSet> {
        match self {
            Family::Extensional { ids, .. } => Some(ids),
            Family::Intensional { .. } => None,
        }
    }

    pub fn contains(&self, p: &UniformPartition) -> bool {
        match self {
            Family::Extensional { universe, ids } => universe.id_of(p).is_some_and(|i| ids.contains(i)),
            Family::Intensional { rule, .. } => rule.contains(p),
        }
    }

    /// Members of an extensional family in canonical order.
    pub fn members(&self) -> Result<Vec<UniformPartition>> {
        match self {
            Family::Extensional { universe, ids } => Ok(universe.members(ids).cloned().collect()),
            Family::Intensional { rule: Rule::Listed(items), .. } => {
                let mut items = items.clone();
                items.sort();
                Ok(items)
            }
            Family::Intensional { .. } => {
                Err(Error::PreconditionViolated("members of an intensional family are not enumerable".into()))
            }
        }
    }

    /// Blocks shared by every member; `None` for an empty family.
    pub fn common_blocks(&self) -> Result<Option<PartialPartition>> {
        Ok(common_blocks_of(&self.members()?))
    }

    pub fn sample_member(&self, seed: u64) -> Result<UniformPartition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    fn sample_with<R: Rng>(&self, rng: &mut R) -> Result<UniformPartition> {
        match self {
            Family::Extensional { universe, ids } => {
                let n = ids.count_ones(..);
                if n == 0 {
                    return Err(Error::EmptyFamily);
                }
                let pick = rng.gen_range(0..n);
                Ok(universe.get(ids.ones().nth(pick).expect("index below count")).clone())
            }
            Family::Intensional { params, rule, .. } => rule.sample(*params, rng),
        }
    }
}

/// Blocks shared by every listed partition; `None` for an empty list.
pub fn common_blocks_of<P: AsRef<PartialPartition>>(items: &[P]) -> Option<PartialPartition> {
    let (first, rest) = items.split_first()?;
    Some(rest.iter().fold(first.as_ref().clone(), |acc, p| acc.intersection(p.as_ref())))
}

impl AsRef<PartialPartition> for UniformPartition {
    fn as_ref(&self) -> &PartialPartition {
        self.as_partial()
    }
}

impl AsRef<PartialPartition> for PartialPartition {
    fn as_ref(&self) -> &PartialPartition {
        self
    }
}

/// Which extremal construction a spec describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[derive(Default)]
pub enum Kind {
    #[default]
    Star,
    Ball,
    N1,
    N2,
    N3,
    SumPair,
    C51,
    C52,
    C53,
}

impl Kind {
    pub const ALL: [Kind; 9] =
        [Kind::Star, Kind::Ball, Kind::N1, Kind::N2, Kind::N3, Kind::SumPair, Kind::C51, Kind::C52, Kind::C53];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Star => "Star",
            Kind::Ball => "Ball",
            Kind::N1 => "N1",
            Kind::N2 => "N2",
            Kind::N3 => "N3",
            Kind::SumPair => "SumPair",
            Kind::C51 => "C51",
            Kind::C52 => "C52",
            Kind::C53 => "C53",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown family kind {s:?}")))
    }
}

/// Variants of the `k = t + 2` constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Two members per side; the last base block is not inside the union of
    /// the two replacement blocks.
    Loose,
    /// Three members per side; the last base block is inside that union.
    Tight,
    /// Two members per side; the first two and last two base blocks are
    /// re-split.
    Double,
}

impl Variant {
    pub fn kind(self) -> Kind {
        match self {
            Variant::Loose => Kind::C51,
            Variant::Tight => Kind::C52,
            Variant::Double => Kind::C53,
        }
    }

    pub fn from_kind(kind: Kind) -> Option<Self> {
        match kind {
            Kind::C51 => Some(Variant::Loose),
            Kind::C52 => Some(Variant::Tight),
            Kind::C53 => Some(Variant::Double),
            _ => None,
        }
    }
}

/// Block system defining a `k = t + 2` construction. `base` is the ordered
/// list `e_1, ..., e_k` (not canonically sorted).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ESystem {
    /// `shifted` lies inside `e_{k-1} ∪ e_k`, `crossed` inside `e_1 ∪ e_k`.
    Swap { base: Vec<Block>, shifted: Block, crossed: Block },
    /// `head` re-splits `e_1 ∪ e_2`, `tail` re-splits `e_{k-1} ∪ e_k`.
    Double { base: Vec<Block>, head: [Block; 2], tail: [Block; 2] },
}

impl ESystem {
    pub fn base(&self) -> &[Block] {
        match self {
            ESystem::Swap { base, .. } | ESystem::Double { base, .. } => base,
        }
    }

    /// Builds both families, validating every member and the variant's
    /// side condition.
    pub fn families(&self, params: Params, variant: Variant) -> Result<(Vec<UniformPartition>, Vec<UniformPartition>)> {
        let k = params.k;
        if k < 3 {
            return Err(Error::InvalidParams("these constructions need k = t + 2 >= 3".into()));
        }
        let base = self.base();
        if base.len() != k {
            return Err(Error::InvalidAnchors(format!("base needs {k} blocks, got {}", base.len())));
        }
        let whole = UniformPartition::new(params, base.to_vec()).map_err(anchor_err)?;
        let t = k - 2;
        let (first, before_last, last) = (base[0], base[t], base[t + 1]);
        let uni = |blocks: Vec<Block>| UniformPartition::new(params, blocks).map_err(anchor_err);
        match (self, variant) {
            (ESystem::Swap { shifted, crossed, .. }, Variant::Loose | Variant::Tight) => {
                let pair_tail = before_last.union(last);
                let pair_edge = first.union(last);
                check_split(*shifted, pair_tail, before_last, last, params.c)?;
                check_split(*crossed, pair_edge, first, last, params.c)?;
                if !shifted.is_disjoint(*crossed) {
                    return Err(Error::InvalidAnchors("replacement blocks overlap".into()));
                }
                let covered = last.is_subset(shifted.union(*crossed));
                let shifted_rest = Block::from_bits(pair_tail.bits() & !shifted.bits());
                let crossed_rest = Block::from_bits(pair_edge.bits() & !crossed.bits());
                let three = first.union(before_last).union(last);
                let leftover = Block::from_bits(three.bits() & !shifted.bits() & !crossed.bits());
                let middle = &base[1..t];
                let with_middle = |extra: &[Block]| {
                    let mut v = middle.to_vec();
                    v.extend_from_slice(extra);
                    v
                };
                let mut fam_f = vec![whole.clone(), uni(with_middle(&[leftover, *shifted, *crossed]))?];
                let mut fam_g = vec![
                    uni(base[..t].iter().copied().chain([*shifted, shifted_rest]).collect())?,
                    uni(with_middle(&[crossed_rest, before_last, *crossed]))?,
                ];
                match variant {
                    Variant::Loose if covered => {
                        return Err(Error::InvalidAnchors("last base block lies inside the replacements".into()))
                    }
                    Variant::Tight if !covered => {
                        return Err(Error::InvalidAnchors("last base block is not inside the replacements".into()))
                    }
                    Variant::Tight => {
                        let third = Block::from_bits(three.bits() & !crossed_rest.bits() & !shifted_rest.bits());
                        fam_f.push(uni(with_middle(&[crossed_rest, third, shifted_rest]))?);
                        fam_g.push(uni(with_middle(&[leftover, third, last]))?);
                    }
                    _ => {}
                }
                Ok((fam_f, fam_g))
            }
            (ESystem::Double { head, tail, .. }, Variant::Double) => {
                if t < 2 {
                    return Err(Error::InfeasibleConstruction("the double re-split needs t >= 2".into()));
                }
                check_pair_split(*head, base[0], base[1])?;
                check_pair_split(*tail, before_last, last)?;
                let inner = &base[2..t];
                let fam_f = vec![
                    whole,
                    uni(inner.iter().copied().chain(head.iter().copied()).chain(tail.iter().copied()).collect())?,
                ];
                let fam_g = vec![
                    uni(base[..t].iter().copied().chain(tail.iter().copied()).collect())?,
                    uni(base[2..].iter().copied().chain(head.iter().copied()).collect())?,
                ];
                Ok((fam_f, fam_g))
            }
            _ => Err(Error::InvalidAnchors(format!("block system does not fit variant {:?}", variant))),
        }
    }
}

fn anchor_err(e: Error) -> Error {
    Error::InvalidAnchors(e.to_string())
}

fn check_split(block: Block, within: Block, a: Block, b: Block, c: usize) -> Result<()> {
    if block.len() != c || !block.is_subset(within) || block == a || block == b {
        return Err(Error::InvalidAnchors(format!("{block} is not a proper re-split of {a} and {b}")));
    }
    Ok(())
}

fn check_pair_split(pair: [Block; 2], a: Block, b: Block) -> Result<()> {
    let same = (pair[0] == a && pair[1] == b) || (pair[0] == b && pair[1] == a);
    if same || !pair[0].is_disjoint(pair[1]) || pair[0].union(pair[1]) != a.union(b) || pair[0].len() != a.len() {
        return Err(Error::InvalidAnchors(format!("{} {} is not a proper re-split of {a} and {b}", pair[0], pair[1])));
    }
    Ok(())
}

/// All block systems for a variant over one ordered base, in lectic order.
pub fn e_systems_over(params: Params, variant: Variant, base: &[Block]) -> Vec<ESystem> {
    let k = base.len();
    let mut out = Vec::new();
    if k < 3 {
        return out;
    }
    let t = k - 2;
    let (first, before_last, last) = (base[0], base[t], base[t + 1]);
    match variant {
        Variant::Loose | Variant::Tight => {
            for shifted in params.blocks_within(before_last.union(last).bits()) {
                if shifted == before_last || shifted == last {
                    continue;
                }
                for crossed in params.blocks_within(first.union(last).bits()) {
                    let sys = ESystem::Swap { base: base.to_vec(), shifted, crossed };
                    if sys.families(params, variant).is_ok() {
                        out.push(sys);
                    }
                }
            }
        }
        Variant::Double => {
            if t < 2 {
                return out;
            }
            for head in pair_splits(params, base[0], base[1]) {
                for tail in pair_splits(params, before_last, last) {
                    out.push(ESystem::Double { base: base.to_vec(), head, tail });
                }
            }
        }
    }
    out
}

fn pair_splits(params: Params, a: Block, b: Block) -> Vec<[Block; 2]> {
    let union = a.union(b);
    let least = union.bits() & union.bits().wrapping_neg();
    params
        .blocks_within(union.bits())
        .into_iter()
        .filter(|x| x.bits() & least != 0 && *x != a && *x != b)
        .map(|x| [x, Block::from_bits(union.bits() & !x.bits())])
        .collect()
}

/// First block system for a variant, searching every ordering of the
/// canonical base. Every system is a relabelling of one over that base, so
/// an empty result proves the variant infeasible for these parameters.
pub fn find_e_system(params: Params, t: usize, variant: Variant) -> Result<ESystem> {
    check_k_is_t_plus_2(params, t)?;
    let base = canonical_partition(params);
    for order in permutations(params.k) {
        let ordered: Vec<Block> = order.iter().map(|&i| base.blocks()[i]).collect();
        if let Some(sys) = e_systems_over(params, variant, &ordered).into_iter().next() {
            return Ok(sys);
        }
    }
    Err(Error::InfeasibleConstruction(format!(
        "no {} block system exists at c={}, k={}, t={t}",
        variant.kind(),
        params.c,
        params.k
    )))
}

fn check_k_is_t_plus_2(params: Params, t: usize) -> Result<()> {
    params.check_t(t)?;
    if params.k != t + 2 || params.c < 2 {
        return Err(Error::InvalidParams(format!("need k = t + 2 and c >= 2 (c={}, k={}, t={t})", params.c, params.k)));
    }
    Ok(())
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..n).permutations(n).collect()
}

/// The partition `{1..c}, {c+1..2c}, ...`.
pub fn canonical_partition(params: Params) -> UniformPartition {
    let c = params.c;
    let blocks = (0..params.k).map(|i| Block::from_bits(crate::partition::low_mask(c) << (i * c))).collect();
    UniformPartition::from_sorted_unchecked(params, blocks)
}

/// A fully specified construction with its anchors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub kind: Kind,
    pub params: Params,
    pub t: usize,
    pub anchors: Anchors,
}

/// Defining partial partitions of each construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anchors {
    Core(PartialPartition),
    Center(UniformPartition),
    Split { core: PartialPartition, left: PartialPartition, right: PartialPartition },
    Frame(PartialPartition),
    Quad([Block; 4]),
    System(ESystem),
}

/// Two families built from one spec, listed in the order the construction
/// pairs them.
#[derive(Clone, Debug)]
pub struct FamilyPair {
    pub first: Family,
    pub second: Family,
}

impl FamilySpec {
    pub fn star(core: PartialPartition, t: usize) -> Result<Self> {
        let params = core.params();
        params.check_t(t)?;
        if core.len() != t {
            return Err(Error::InvalidAnchors(format!("star core needs {t} blocks, got {}", core.len())));
        }
        Ok(FamilySpec { kind: Kind::Star, params, t, anchors: Anchors::Core(core) })
    }

    pub fn ball(center: UniformPartition, t: usize) -> Result<Self> {
        Self::centered(Kind::Ball, center, t)
    }

    pub fn sum_pair(center: UniformPartition, t: usize) -> Result<Self> {
        Self::centered(Kind::SumPair, center, t)
    }

    fn centered(kind: Kind, center: UniformPartition, t: usize) -> Result<Self> {
        let params = center.params();
        params.check_t(t)?;
        Ok(FamilySpec { kind, params, t, anchors: Anchors::Center(center) })
    }

    pub fn n1(core: PartialPartition, left: PartialPartition, right: PartialPartition, t: usize) -> Result<Self> {
        let params = core.params();
        params.check_t(t)?;
        params.ensure_same(&left.params())?;
        params.ensure_same(&right.params())?;
        let k = params.k;
        if k < t + 3 {
            return Err(Error::InvalidAnchors(format!("need k >= t + 3 (k={k}, t={t})")));
        }
        if core.len() != t || left.len() != k - 1 || right.len() != k - 1 {
            return Err(Error::InvalidAnchors(format!(
                "need |T| = {t} and |L| = |M| = {} (got {}, {}, {})",
                k - 1,
                core.len(),
                left.len(),
                right.len()
            )));
        }
        let overlap = left.intersection(&right);
        if !core.is_subset_of(&overlap) {
            return Err(Error::InvalidAnchors("T must lie in both L and M".into()));
        }
        if overlap.len() < t + t.min(2) {
            return Err(Error::InvalidAnchors(format!(
                "L and M share {} blocks, need at least {}",
                overlap.len(),
                t + t.min(2)
            )));
        }
        Ok(FamilySpec { kind: Kind::N1, params, t, anchors: Anchors::Split { core, left, right } })
    }

    /// Frames with `k = t + 2` are accepted for exploration.
    pub fn n2(frame: PartialPartition, t: usize) -> Result<Self> {
        let params = frame.params();
        params.check_t(t)?;
        if frame.len() != t + 2 {
            return Err(Error::InvalidAnchors(format!("frame needs {} blocks, got {}", t + 2, frame.len())));
        }
        Ok(FamilySpec { kind: Kind::N2, params, t, anchors: Anchors::Frame(frame) })
    }

    /// Blocks `e_1..e_4`; pairs `{e_1,e_2}`, `{e_3,e_4}`, `{e_1,e_3}`,
    /// `{e_2,e_4}` and `{e_1,e_4}` must each be disjoint.
    pub fn n3(params: Params, blocks: [Block; 4]) -> Result<Self> {
        if params.k < 4 {
            return Err(Error::InvalidAnchors(format!("need k >= 4 (k={})", params.k)));
        }
        for b in blocks {
            b.validate(&params).map_err(anchor_err)?;
        }
        for (i, j) in [(0, 1), (2, 3), (0, 2), (1, 3), (0, 3)] {
            if !blocks[i].is_disjoint(blocks[j]) {
                return Err(Error::InvalidAnchors(format!("{} and {} overlap", blocks[i], blocks[j])));
            }
        }
        Ok(FamilySpec { kind: Kind::N3, params, t: 1, anchors: Anchors::Quad(blocks) })
    }

    pub fn e_system(params: Params, t: usize, variant: Variant, system: ESystem) -> Result<Self> {
        check_k_is_t_plus_2(params, t)?;
        system.families(params, variant)?;
        Ok(FamilySpec { kind: variant.kind(), params, t, anchors: Anchors::System(system) })
    }

    /// `L = M` with `k = t + 3`, where the family coincides with the frame
    /// family of `M`.
    pub fn is_degenerate(&self) -> bool {
        matches!(&self.anchors, Anchors::Split { left, right, .. } if left == right && self.params.k == self.t + 3)
    }

    /// Membership rules of the two paired families.
    pub fn rules(&self) -> Result<(Rule, Rule)> {
        let t = self.t;
        Ok(match (&self.anchors, self.kind) {
            (Anchors::Core(core), _) => (Rule::Contains(core.clone()), Rule::Contains(core.clone())),
            (Anchors::Center(center), Kind::Ball) => (
                Rule::AtLeast { anchor: center.as_partial().clone(), min: t },
                Rule::Listed(vec![center.clone()]),
            ),
            (Anchors::Center(center), _) => (
                Rule::Listed(vec![center.clone()]),
                Rule::AtLeast { anchor: center.as_partial().clone(), min: t },
            ),
            (Anchors::Split { core, left, right }, _) => (
                Rule::Split { core: core.clone(), left: left.clone(), right: right.clone() },
                Rule::Split { core: core.clone(), left: right.clone(), right: left.clone() },
            ),
            (Anchors::Frame(frame), _) => {
                let rule = Rule::AtLeast { anchor: frame.clone(), min: t + 1 };
                (rule.clone(), rule)
            }
            (Anchors::Quad(e), _) => {
                let pair = |a: Block, b: Block| PartialPartition::new(self.params, vec![a, b]);
                (
                    Rule::ContainsAny(vec![pair(e[0], e[1])?, pair(e[2], e[3])?, pair(e[0], e[3])?]),
                    Rule::ContainsAny(vec![pair(e[0], e[2])?, pair(e[1], e[3])?, pair(e[0], e[3])?]),
                )
            }
            (Anchors::System(system), kind) => {
                let variant = Variant::from_kind(kind)
                    .ok_or_else(|| Error::InvalidAnchors(format!("{kind} does not take a block system")))?;
                let (a, b) = system.families(self.params, variant)?;
                (Rule::Listed(a), Rule::Listed(b))
            }
        })
    }

    /// Closed-form sizes of the two families, where one exists.
    pub fn formula_sizes(&self) -> Result<(Option<BigInt>, Option<BigInt>)> {
        let Params { c, k } = self.params;
        let t = self.t;
        let ball = || -> Result<BigInt> { Ok(n_class_counts(c, k)?[t..].iter().sum()) };
        Ok(match self.kind {
            Kind::Star => {
                let v = theta(c, k, t)?;
                (Some(v.clone()), Some(v))
            }
            Kind::Ball => (Some(ball()?), Some(BigInt::from(1))),
            Kind::SumPair => (Some(BigInt::from(1)), Some(ball()?)),
            Kind::N1 if self.is_degenerate() => {
                let v = f2(c, k, t)?;
                (Some(v.clone()), Some(v))
            }
            Kind::N1 => {
                let v = f1(c, k, t)?;
                (Some(v.clone()), Some(v))
            }
            Kind::N2 if k >= t + 2 => {
                let v = f2(c, k, t)?;
                (Some(v.clone()), Some(v))
            }
            Kind::N3 => {
                let v = f2(c, k, 1)?;
                (Some(v.clone()), Some(v))
            }
            Kind::C51 | Kind::C53 => (Some(BigInt::from(2)), Some(BigInt::from(2))),
            Kind::C52 => (Some(BigInt::from(3)), Some(BigInt::from(3))),
            Kind::N2 => (None, None),
        })
    }

    /// Both families over an enumerated universe.
    pub fn realize(&self, universe: &Arc<PartitionUniverse>) -> Result<FamilyPair> {
        self.params.ensure_same(&universe.params())?;
        let (a, b) = self.rules()?;
        Ok(FamilyPair { first: Family::realize(universe, &a), second: Family::realize(universe, &b) })
    }

    /// Both families as membership rules with formula sizes.
    pub fn intensional(&self) -> Result<FamilyPair> {
        let (a, b) = self.rules()?;
        let (sa, sb) = self.formula_sizes()?;
        Ok(FamilyPair {
            first: Family::Intensional { params: self.params, rule: a, size: sa },
            second: Family::Intensional { params: self.params, rule: b, size: sb },
        })
    }

    /// Deterministic anchors for a kind: blocks taken from the canonical
    /// partition (and for `M`, one block re-split across the last two).
    pub fn canonical(kind: Kind, params: Params, t: usize) -> Result<Self> {
        params.check_t(t)?;
        let base = canonical_partition(params);
        let b = base.blocks();
        let take = |n: usize| PartialPartition::new(params, b[..n.min(params.k)].to_vec());
        match kind {
            Kind::Star => Self::star(take(t)?, t),
            Kind::Ball => Self::ball(base.clone(), t),
            Kind::SumPair => Self::sum_pair(base.clone(), t),
            Kind::N1 => {
                let k = params.k;
                if k < t + 3 {
                    return Err(Error::InvalidAnchors(format!("need k >= t + 3 (k={k}, t={t})")));
                }
                let left = take(k - 1)?;
                let right = if k - 2 >= t + t.min(2) {
                    let c = params.c;
                    let mixed = (b[k - 2].bits() & !(1u128 << (c * (k - 1) - 1))) | (1u128 << (c * (k - 1)));
                    PartialPartition::new(params, b[..k - 2].iter().copied().chain([Block::from_bits(mixed)]).collect())?
                } else {
                    left.clone()
                };
                Self::n1(take(t)?, left, right, t)
            }
            Kind::N2 => Self::n2(take(t + 2)?, t),
            Kind::N3 => {
                if params.k < 4 {
                    return Err(Error::InvalidAnchors(format!("need k >= 4 (k={})", params.k)));
                }
                Self::n3(params, [b[0], b[1], b[2], b[3]])
            }
            Kind::C51 | Kind::C52 | Kind::C53 => {
                let variant = Variant::from_kind(kind).expect("e-system kind");
                let system = find_e_system(params, t, variant)?;
                Self::e_system(params, t, variant, system)
            }
        }
    }

    pub fn to_json(&self) -> SpecJson {
        let blocks = |p: &PartialPartition| Some(p.to_one_based());
        let list = |v: &[Block]| Some(v.iter().map(|b| b.to_one_based()).collect::<Vec<_>>());
        let mut out = SpecJson {
            kind: self.kind,
            c: self.params.c,
            k: self.params.k,
            t: self.t,
            ..SpecJson::default()
        };
        match &self.anchors {
            Anchors::Core(core) => out.core = blocks(core),
            Anchors::Center(center) => out.center = blocks(center),
            Anchors::Split { core, left, right } => {
                out.core = blocks(core);
                out.left = blocks(left);
                out.right = blocks(right);
            }
            Anchors::Frame(frame) => out.frame = blocks(frame),
            Anchors::Quad(e) => out.base = list(e),
            Anchors::System(ESystem::Swap { base, shifted, crossed }) => {
                out.base = list(base);
                out.shifted = Some(shifted.to_one_based());
                out.crossed = Some(crossed.to_one_based());
            }
            Anchors::System(ESystem::Double { base, head, tail }) => {
                out.base = list(base);
                out.head = list(head);
                out.tail = list(tail);
            }
        }
        out
    }

    pub fn from_json(json: &SpecJson) -> Result<Self> {
        let params = Params::new(json.c, json.k)?;
        let t = json.t;
        let missing = |name: &str| Error::InvalidAnchors(format!("{} spec needs field {name}", json.kind));
        let partial = |field: &Option<Vec<Vec<usize>>>, name: &str| -> Result<PartialPartition> {
            PartialPartition::from_one_based(params, field.as_ref().ok_or_else(|| missing(name))?)
        };
        let block_list = |field: &Option<Vec<Vec<usize>>>, name: &str| -> Result<Vec<Block>> {
            field
                .as_ref()
                .ok_or_else(|| missing(name))?
                .iter()
                .map(|b| Block::from_one_based(b).and_then(|blk| blk.validate(&params).map(|_| blk)))
                .collect()
        };
        let single = |field: &Option<Vec<usize>>, name: &str| -> Result<Block> {
            Block::from_one_based(field.as_ref().ok_or_else(|| missing(name))?)
        };
        let pair = |field: &Option<Vec<Vec<usize>>>, name: &str| -> Result<[Block; 2]> {
            block_list(field, name)?.try_into().map_err(|_| Error::InvalidAnchors(format!("{name} needs two blocks")))
        };
        match json.kind {
            Kind::Star => Self::star(partial(&json.core, "T")?, t),
            Kind::Ball | Kind::SumPair => {
                let center = UniformPartition::from_partial(partial(&json.center, "C")?)?;
                Self::centered(json.kind, center, t)
            }
            Kind::N1 => Self::n1(partial(&json.core, "T")?, partial(&json.left, "L")?, partial(&json.right, "M")?, t),
            Kind::N2 => Self::n2(partial(&json.frame, "Z")?, t),
            Kind::N3 => {
                let e: [Block; 4] = block_list(&json.base, "E")?
                    .try_into()
                    .map_err(|_| Error::InvalidAnchors("N3 needs four blocks in E".into()))?;
                Self::n3(params, e)
            }
            Kind::C51 | Kind::C52 => {
                let system = ESystem::Swap {
                    base: block_list(&json.base, "E")?,
                    shifted: single(&json.shifted, "shifted")?,
                    crossed: single(&json.crossed, "crossed")?,
                };
                Self::e_system(params, t, Variant::from_kind(json.kind).expect("swap kind"), system)
            }
            Kind::C53 => {
                let system = ESystem::Double {
                    base: block_list(&json.base, "E")?,
                    head: pair(&json.head, "head")?,
                    tail: pair(&json.tail, "tail")?,
                };
                Self::e_system(params, t, Variant::Double, system)
            }
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("spec serialises")
    }
}

/// JSON form of a [`FamilySpec`]; blocks are ascending 1-based arrays.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecJson {
    pub kind: Kind,
    pub c: usize,
    pub k: usize,
    pub t: usize,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub core: Option<Vec<Vec<usize>>>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Vec<Vec<usize>>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub right: Option<Vec<Vec<usize>>>,
    #[serde(rename = "Z", default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Vec<usize>>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<Vec<usize>>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifted: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossed: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Vec<Vec<usize>>>,
}


pub fn star(universe: &Arc<PartitionUniverse>, core: PartialPartition, t: usize) -> Result<Family> {
    Ok(FamilySpec::star(core, t)?.realize(universe)?.first)
}

pub fn ball(universe: &Arc<PartitionUniverse>, center: UniformPartition, t: usize) -> Result<Family> {
    Ok(FamilySpec::ball(center, t)?.realize(universe)?.first)
}

pub fn n1(
    universe: &Arc<PartitionUniverse>,
    core: PartialPartition,
    left: PartialPartition,
    right: PartialPartition,
    t: usize,
) -> Result<Family> {
    Ok(FamilySpec::n1(core, left, right, t)?.realize(universe)?.first)
}

pub fn n2(universe: &Arc<PartitionUniverse>, frame: PartialPartition, t: usize) -> Result<Family> {
    Ok(FamilySpec::n2(frame, t)?.realize(universe)?.first)
}

pub fn n3_pair(universe: &Arc<PartitionUniverse>, blocks: [Block; 4]) -> Result<FamilyPair> {
    FamilySpec::n3(universe.params(), blocks)?.realize(universe)
}

/// The two families of a `k = t + 2` construction. Without an explicit
/// block system one is searched for; none existing is an
/// [`Error::InfeasibleConstruction`].
pub fn construction_5x(params: Params, t: usize, variant: Variant, system: Option<ESystem>) -> Result<FamilyPair> {
    let system = match system {
        Some(s) => s,
        None => find_e_system(params, t, variant)?,
    };
    FamilySpec::e_system(params, t, variant, system)?.intensional()
}

/// Outcome of a cross-intersection check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossCheck {
    /// Every pair was examined.
    Exact { holds: bool, witness: Option<(UniformPartition, UniformPartition)> },
    /// Random pairs were examined; `violation` is a counterexample if found.
    Sampled { samples: u64, violation: Option<(UniformPartition, UniformPartition)> },
}

impl CrossCheck {
    /// True for an exact pass, or a sampled pass with no counterexample.
    pub fn no_violation(&self) -> bool {
        match self {
            CrossCheck::Exact { holds, .. } => *holds,
            CrossCheck::Sampled { violation, .. } => violation.is_none(),
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, CrossCheck::Exact { holds: true, .. })
    }
}

/// Exact when both families are extensional; otherwise samples `samples`
/// member pairs deterministically from `seed`.
pub fn is_cross_intersecting(a: &Family, b: &Family, t: usize, samples: u64, seed: u64) -> Result<CrossCheck> {
    a.params().ensure_same(&b.params())?;
    if let (Ok(ma), Ok(mb)) = (a.members(), b.members()) {
        let witness = ma.par_iter().find_map_first(|x| {
            mb.iter().find(|y| x.shared_blocks(y) < t).map(|y| (x.clone(), y.clone()))
        });
        return Ok(CrossCheck::Exact { holds: witness.is_none(), witness });
    }
    let violation = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Option<(UniformPartition, UniformPartition)>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let x = a.sample_with(&mut rng)?;
            let y = b.sample_with(&mut rng)?;
            Ok((x.shared_blocks(&y) < t).then_some((x, y)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .next();
    Ok(CrossCheck::Sampled { samples, violation })
}

/// Exact check on explicit lists of partial partitions.
pub fn lists_cross_intersect<P: AsRef<PartialPartition> + Sync>(a: &[P], b: &[P], t: usize) -> bool {
    a.par_iter().all(|x| b.iter().all(|y| x.as_ref().shared_blocks(y.as_ref()) >= t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::enumerate_universe;

    fn universe(c: usize, k: usize) -> Arc<PartitionUniverse> {
        Arc::new(enumerate_universe(Params::new(c, k).unwrap()).unwrap())
    }

    fn pp(params: Params, blocks: &[&[usize]]) -> PartialPartition {
        PartialPartition::from_one_based(params, &blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn up(params: Params, text: &str) -> UniformPartition {
        let blocks: Vec<Vec<usize>> =
            text.split('|').map(|b| b.chars().map(|ch| ch.to_digit(10).unwrap() as usize).collect()).collect();
        UniformPartition::from_one_based(params, &blocks).unwrap()
    }

    #[test]
    fn star_and_ball_examples() {
        let u = universe(2, 3);
        let p = u.params();
        assert_eq!(star(&u, pp(p, &[&[1, 2]]), 1).unwrap().len(), Some(3));
        let full = u.get(4).as_partial().clone();
        assert_eq!(star(&u, full, 3).unwrap().len(), Some(1));

        let u = universe(3, 3);
        let p = u.params();
        assert_eq!(star(&u, pp(p, &[&[1, 2, 3]]), 1).unwrap().len(), Some(10));
        let c = canonical_partition(p);
        assert_eq!(ball(&u, c.clone(), 1).unwrap().len(), Some(28));
        assert_eq!(ball(&u, c.clone(), 3).unwrap().members().unwrap(), vec![c]);

        let u = universe(2, 4);
        assert_eq!(ball(&u, canonical_partition(u.params()), 1).unwrap().len(), Some(45));
    }

    #[test]
    fn n1_and_n2_sizes() {
        let u = universe(2, 4);
        let p = u.params();
        let fam = n1(
            &u,
            pp(p, &[&[1, 2]]),
            pp(p, &[&[1, 2], &[3, 4], &[5, 6]]),
            pp(p, &[&[1, 2], &[3, 4], &[5, 7]]),
            1,
        )
        .unwrap();
        assert_eq!(fam.len(), Some(7));
        assert_eq!(n2(&u, pp(p, &[&[1, 2], &[3, 4], &[5, 6]]), 1).unwrap().len(), Some(7));
        let bad = FamilySpec::n1(pp(p, &[&[1, 2]]), pp(p, &[&[1, 2], &[3, 4], &[5, 6]]), pp(p, &[&[1, 2], &[3, 5], &[4, 6]]), 1);
        assert!(matches!(bad, Err(Error::InvalidAnchors(_))));
    }

    #[test]
    fn n1_predicate_truth_table() {
        let p = Params::new(2, 4).unwrap();
        let spec = FamilySpec::n1(
            pp(p, &[&[1, 2]]),
            pp(p, &[&[1, 2], &[3, 4], &[5, 6]]),
            pp(p, &[&[1, 2], &[3, 4], &[5, 7]]),
            1,
        )
        .unwrap();
        let (rule, _) = spec.rules().unwrap();
        assert!(rule.contains(&up(p, "12|34|57|68")));
        assert!(!rule.contains(&up(p, "12|35|47|68")));
        assert!(!rule.contains(&up(p, "13|24|57|68")));
        assert!(rule.contains(&up(p, "18|26|34|57")));
        assert!(!rule.contains(&up(p, "18|27|34|56")));
    }

    #[test]
    fn n3_families_cross_intersect_without_common_blocks() {
        let u = universe(2, 4);
        let p = u.params();
        let e = [pp(p, &[&[1, 2]]), pp(p, &[&[3, 4]]), pp(p, &[&[5, 6]]), pp(p, &[&[7, 8]])].map(|x| x.blocks()[0]);
        let pair = n3_pair(&u, e).unwrap();
        let check = is_cross_intersecting(&pair.first, &pair.second, 1, 0, 0).unwrap();
        assert!(check.is_certified());
        assert!(pair.first.common_blocks().unwrap().unwrap().is_empty());
        assert!(pair.second.common_blocks().unwrap().unwrap().is_empty());
        let a1 = PartialPartition::new(p, vec![e[0], e[1]]).unwrap();
        for id in u.enumerate_containing(&a1).unwrap().ones() {
            assert!(pair.first.ids().unwrap().contains(id));
        }
        assert_eq!(pair.first.len(), Some(f2(2, 4, 1).unwrap().try_into().unwrap()));
    }

    #[test]
    fn tight_example_matches_block_table() {
        let p = Params::new(2, 3).unwrap();
        let b = |s: &str| Block::from_one_based(&s.chars().map(|ch| ch.to_digit(10).unwrap() as usize).collect::<Vec<_>>()).unwrap();
        let sys = ESystem::Swap { base: vec![b("12"), b("34"), b("56")], shifted: b("35"), crossed: b("26") };
        let (mut f, mut g) = sys.families(p, Variant::Tight).unwrap();
        f.sort();
        g.sort();
        let mut ef = vec![up(p, "12|34|56"), up(p, "14|35|26"), up(p, "15|23|46")];
        let mut eg = vec![up(p, "12|35|46"), up(p, "15|34|26"), up(p, "14|23|56")];
        ef.sort();
        eg.sort();
        assert_eq!((f.clone(), g.clone()), (ef, eg));
        assert!(lists_cross_intersect(&f, &g, 1));
    }

    #[test]
    fn loose_variant_feasibility() {
        let p = Params::new(2, 3).unwrap();
        assert!(matches!(find_e_system(p, 1, Variant::Loose), Err(Error::InfeasibleConstruction(_))));
        let u = universe(2, 3);
        for base in u.items() {
            for order in permutations(3) {
                let ordered: Vec<Block> = order.iter().map(|&i| base.blocks()[i]).collect();
                assert!(e_systems_over(p, Variant::Loose, &ordered).is_empty());
            }
        }
        let p = Params::new(3, 3).unwrap();
        let pair = construction_5x(p, 1, Variant::Loose, None).unwrap();
        assert_eq!((pair.first.members().unwrap().len(), pair.second.members().unwrap().len()), (2, 2));
        assert!(is_cross_intersecting(&pair.first, &pair.second, 1, 0, 0).unwrap().is_certified());
        assert!(matches!(find_e_system(Params::new(2, 3).unwrap(), 1, Variant::Double), Err(Error::InfeasibleConstruction(_))));
        let pair = construction_5x(Params::new(2, 4).unwrap(), 2, Variant::Double, None).unwrap();
        assert!(is_cross_intersecting(&pair.first, &pair.second, 2, 0, 0).unwrap().is_certified());
    }

    #[test]
    fn disjoint_pair_fails_cross_check() {
        let p = Params::new(2, 3).unwrap();
        let a = vec![up(p, "12|34|56")];
        let b = vec![up(p, "13|25|46")];
        assert!(!lists_cross_intersect(&a, &b, 1));
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"kind":"N1","c":2,"k":4,"t":1,"T":[[1,2]],"L":[[1,2],[3,4],[5,6]],"M":[[1,2],[3,4],[5,7]]}"#;
        let spec = FamilySpec::from_json_str(text).unwrap();
        assert_eq!(spec.to_json_string(), text);
        for kind in Kind::ALL {
            let (params, t) = match kind {
                Kind::C51 => (Params::new(3, 3).unwrap(), 1),
                Kind::C52 => (Params::new(2, 3).unwrap(), 1),
                Kind::C53 => (Params::new(2, 4).unwrap(), 2),
                _ => (Params::new(2, 4).unwrap(), 1),
            };
            let spec = FamilySpec::canonical(kind, params, t).unwrap();
            assert_eq!(FamilySpec::from_json_str(&spec.to_json_string()).unwrap(), spec);
        }
    }

    #[test]
    fn sampling_is_seeded_and_valid() {
        let spec = FamilySpec::canonical(Kind::N2, Params::new(6, 5).unwrap(), 1).unwrap();
        let pair = spec.intensional().unwrap();
        let (rule, _) = spec.rules().unwrap();
        for seed in 0..20 {
            let m = pair.first.sample_member(seed).unwrap();
            assert!(rule.contains(&m));
            assert_eq!(m, pair.first.sample_member(seed).unwrap());
        }
        let small = FamilySpec::canonical(Kind::N2, Params::new(2, 4).unwrap(), 1).unwrap().intensional().unwrap();
        let drawn: std::collections::BTreeSet<_> = (0..8).map(|s| small.first.sample_member(s).unwrap()).collect();
        assert!(drawn.len() > 1);
    }
}
