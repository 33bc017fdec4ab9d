//! Covers of a family: partial partitions meeting every member in at least
//! `t` blocks, the minimum cover size and the structure of minimum covers.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::{common_blocks_of, lists_cross_intersect};
use crate::counting::{binomial, residual_ratio_bound, theta};
use crate::error::{Error, Result};
use crate::partition::{Block, PartialPartition, UniformPartition};

/// Minimum covers are searched among blocks that occur in some member.
pub const SEARCH_SPACE: &str = "occurring-blocks";

/// Covering number, every minimum cover, and the common-block count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverReport {
    pub t: usize,
    pub tau: usize,
    pub min_covers: Vec<PartialPartition>,
    pub common_blocks: usize,
    pub search_space: &'static str,
}

impl CoverReport {
    /// Minimum covers containing `anchor`.
    pub fn covers_through(&self, anchor: &PartialPartition) -> Vec<&PartialPartition> {
        self.min_covers.iter().filter(|s| anchor.is_subset_of(s)).collect()
    }
}

struct CoverSearch {
    t: usize,
    k: usize,
    blocks: Vec<Block>,
    holders: Vec<Vec<u32>>,
    members: usize,
}

impl CoverSearch {
    fn new<P: AsRef<PartialPartition>>(members: &[P], t: usize) -> Self {
        let blocks: BTreeSet<Block> = members.iter().flat_map(|m| m.as_ref().blocks().iter().copied()).collect();
        let blocks: Vec<Block> = blocks.into_iter().collect();
        let mut holders = vec![Vec::new(); blocks.len()];
        for (mi, m) in members.iter().enumerate() {
            for b in m.as_ref().blocks() {
                let bi = blocks.binary_search(b).expect("occurring block");
                holders[bi].push(mi as u32);
            }
        }
        CoverSearch { t, k: members[0].as_ref().params().k, blocks, holders, members: members.len() }
    }

    fn covers_of_size(&self, size: usize) -> Vec<Vec<usize>> {
        let branches: Vec<Vec<Vec<usize>>> = (0..self.blocks.len())
            .into_par_iter()
            .map(|first| {
                let mut counts = vec![0u32; self.members];
                let mut chosen = Vec::with_capacity(size);
                let mut out = Vec::new();
                self.push(first, &mut counts, &mut chosen);
                self.descend(size, first + 1, self.blocks[first].bits(), &mut counts, &mut chosen, &mut out);
                out
            })
            .collect();
        branches.into_iter().flatten().collect()
    }

    fn push(&self, bi: usize, counts: &mut [u32], chosen: &mut Vec<usize>) {
        chosen.push(bi);
        for &m in &self.holders[bi] {
            counts[m as usize] += 1;
        }
    }

    fn pop(&self, counts: &mut [u32], chosen: &mut Vec<usize>) {
        let bi = chosen.pop().expect("non-empty");
        for &m in &self.holders[bi] {
            counts[m as usize] -= 1;
        }
    }

    fn descend(
        &self,
        size: usize,
        next: usize,
        used: u128,
        counts: &mut Vec<u32>,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let slots = size - chosen.len();
        let worst = counts.iter().map(|&c| self.t.saturating_sub(c as usize)).max().unwrap_or(0);
        if worst > slots {
            return;
        }
        if slots == 0 {
            out.push(chosen.clone());
            return;
        }
        for bi in next..self.blocks.len() {
            if self.blocks[bi].bits() & used != 0 {
                continue;
            }
            self.push(bi, counts, chosen);
            self.descend(size, bi + 1, used | self.blocks[bi].bits(), counts, chosen, out);
            self.pop(counts, chosen);
        }
    }
}

/// Exact covering number and all minimum covers. Fails with
/// [`Error::NoCover`] when no partial partition covers the family.
pub fn covering_number<P: AsRef<PartialPartition> + Sync>(members: &[P], t: usize) -> Result<CoverReport> {
    let first = members.first().ok_or(Error::EmptyFamily)?;
    let params = first.as_ref().params();
    params.check_t(t)?;
    for m in members {
        params.ensure_same(&m.as_ref().params())?;
    }
    let common = common_blocks_of(members).expect("non-empty").len();
    let search = CoverSearch::new(members, t);
    for size in t..=search.k {
        let found = search.covers_of_size(size);
        if !found.is_empty() {
            let min_covers = found
                .into_iter()
                .map(|idx| PartialPartition::new(params, idx.into_iter().map(|i| search.blocks[i]).collect()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(CoverReport { t, tau: size, min_covers, common_blocks: common, search_space: SEARCH_SPACE });
        }
    }
    Err(Error::NoCover)
}

/// Result of the shrink step: an extension `R` of `S` inside `S ∪ G` with
/// `|F_S| <= C(k - |S|, i) * |F_R|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShrinkWitness {
    pub extension: Option<PartialPartition>,
    pub containing_s: usize,
    pub containing_r: usize,
    pub multiplier: BigInt,
    pub candidates: usize,
    pub holds: bool,
}

impl ShrinkWitness {
    /// No member contains `S`, so there is nothing to shrink.
    pub fn is_vacuous(&self) -> bool {
        self.extension.is_none()
    }
}

pub fn shrink_witness(
    members: &[UniformPartition],
    t: usize,
    s: &PartialPartition,
    cover: &UniformPartition,
    i: usize,
) -> Result<ShrinkWitness> {
    let params = s.params();
    params.check_t(t)?;
    params.ensure_same(&cover.params())?;
    if let Some(m) = members.iter().find(|m| m.shared_blocks(cover) < t) {
        return Err(Error::PreconditionViolated(format!("{cover} does not {t}-cover {m}")));
    }
    let r = s.shared_blocks(cover);
    if r >= t {
        return Err(Error::PreconditionViolated(format!("|G ∩ S| = {r} is not below t = {t}")));
    }
    if i == 0 || i > t - r {
        return Err(Error::PreconditionViolated(format!("i = {i} outside 1..={}", t - r)));
    }
    let multiplier = binomial(params.k - s.len(), i);
    let with_s: Vec<&UniformPartition> = members.iter().filter(|m| s.is_subset_of(m)).collect();
    if with_s.is_empty() {
        return Ok(ShrinkWitness {
            extension: None,
            containing_s: 0,
            containing_r: 0,
            multiplier,
            candidates: 0,
            holds: true,
        });
    }
    let free: Vec<Block> =
        cover.blocks().iter().copied().filter(|b| b.bits() & s.support() == 0).collect();
    use itertools::Itertools;
    let mut best: Option<(usize, PartialPartition)> = None;
    let mut candidates = 0;
    for extra in free.iter().copied().combinations(i) {
        candidates += 1;
        let ext = s.union(&PartialPartition::new(params, extra)?)?;
        let n = with_s.iter().filter(|m| ext.is_subset_of(m)).count();
        if best.as_ref().is_none_or(|(b, _)| n > *b) {
            best = Some((n, ext));
        }
    }
    let (containing_r, extension) = best.expect("a covered member forces a candidate");
    let holds = BigInt::from(with_s.len()) <= &multiplier * BigInt::from(containing_r);
    Ok(ShrinkWitness {
        extension: Some(extension),
        containing_s: with_s.len(),
        containing_r,
        multiplier,
        candidates,
        holds,
    })
}

/// Whether minimum covers of two families cross-intersect, with the
/// covering numbers that decide whether the statement applies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverCrossReport {
    pub tau_f: usize,
    pub tau_g: usize,
    pub in_scope: bool,
    pub holds: bool,
}

/// Checks that the minimum `t`-covers of `f` and `g` are cross
/// `t`-intersecting. `in_scope` records whether both covering numbers are at
/// most `k - 2`.
pub fn check_cover_cross_intersection<P: AsRef<PartialPartition> + Sync>(
    f: &[P],
    g: &[P],
    t: usize,
) -> Result<CoverCrossReport> {
    let rf = covering_number(f, t)?;
    let rg = covering_number(g, t)?;
    let k = f[0].as_ref().params().k;
    Ok(CoverCrossReport {
        tau_f: rf.tau,
        tau_g: rg.tau,
        in_scope: rf.tau.max(rg.tau) + 2 <= k,
        holds: lists_cross_intersect(&rf.min_covers, &rg.min_covers, t),
    })
}

/// Union `E` of the minimum covers through an anchor and the two structural
/// facts about it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionStructure {
    pub union: Option<PartialPartition>,
    pub m: usize,
    /// Minimum covers through the anchor are exactly its one-block
    /// extensions inside `E`.
    pub covers_are_extensions: bool,
    /// Members missing the anchor meet `E` in exactly `m - 1` blocks.
    pub others_meet_union: bool,
    pub m_in_range: bool,
}

impl UnionStructure {
    pub fn holds(&self) -> bool {
        self.union.is_some() && self.covers_are_extensions && self.others_meet_union && self.m_in_range
    }
}

pub fn cover_union_structure<P: AsRef<PartialPartition> + Sync>(
    members: &[P],
    t: usize,
    anchor: &PartialPartition,
) -> Result<UnionStructure> {
    let report = covering_number(members, t)?;
    union_structure_with(&report, members, anchor)
}

/// As [`cover_union_structure`], reusing a cover report of `members`.
pub fn union_structure_with<P: AsRef<PartialPartition>>(
    report: &CoverReport,
    members: &[P],
    anchor: &PartialPartition,
) -> Result<UnionStructure> {
    let t = report.t;
    if report.tau != t + 1 {
        return Err(Error::PreconditionViolated(format!("covering number is {}, not {}", report.tau, t + 1)));
    }
    if anchor.len() != t {
        return Err(Error::PreconditionViolated(format!("anchor needs {t} blocks")));
    }
    let through = report.covers_through(anchor);
    if through.is_empty() {
        return Err(Error::PreconditionViolated(format!("no minimum cover contains {anchor}")));
    }
    let blocks: BTreeSet<Block> = through.iter().flat_map(|s| s.blocks().iter().copied()).collect();
    let params = anchor.params();
    let union = PartialPartition::new(params, blocks.iter().copied().collect()).ok();
    let m = blocks.len();
    let Some(e) = union.clone() else {
        return Ok(UnionStructure {
            union,
            m,
            covers_are_extensions: false,
            others_meet_union: false,
            m_in_range: false,
        });
    };
    let extensions: BTreeSet<PartialPartition> = e
        .difference(anchor)
        .blocks()
        .iter()
        .map(|b| anchor.with_block(*b))
        .collect::<Result<_>>()?;
    let through: BTreeSet<PartialPartition> = through.into_iter().cloned().collect();
    let others_meet_union = members
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| !anchor.is_subset_of(p))
        .all(|p| p.shared_blocks(&e) + 1 == m);
    Ok(UnionStructure {
        union,
        m,
        covers_are_extensions: extensions == through,
        others_meet_union,
        m_in_range: m > t && m < params.k,
    })
}

/// Members of `f` containing no minimum cover of `g`, with the size bound
/// `|B| / theta(c,k,t+1) <= 3(t+1)x^3 / (2 C(xc, c))`, `x = k - t - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    pub members: Vec<UniformPartition>,
    pub ratio: BigRational,
    pub bound: BigRational,
    pub holds: bool,
}

pub fn residual_family(f: &[UniformPartition], g: &[UniformPartition], t: usize) -> Result<Residual> {
    let rf = covering_number(f, t)?;
    let rg = covering_number(g, t)?;
    if rf.tau != t + 1 || rg.tau != t + 1 {
        return Err(Error::PreconditionViolated(format!(
            "covering numbers are {} and {}, both must be {}",
            rf.tau,
            rg.tau,
            t + 1
        )));
    }
    residual_with(f, &rg)
}

/// As [`residual_family`], given the cover report of `g`.
pub fn residual_with(f: &[UniformPartition], rg: &CoverReport) -> Result<Residual> {
    let t = rg.t;
    let params = f[0].params();
    let bound = residual_ratio_bound(params.c, params.k, t)
        .map_err(|e| Error::PreconditionViolated(e.to_string()))?;
    let members: Vec<UniformPartition> =
        f.iter().filter(|m| !rg.min_covers.iter().any(|p| p.is_subset_of(m))).cloned().collect();
    let ratio = BigRational::new(BigInt::from(members.len()), theta(params.c, params.k, t + 1)?);
    let holds = ratio <= bound;
    Ok(Residual { members, ratio, bound, holds })
}

/// Shape of a cross `t`-intersecting pair of `(t+1)`-block families with
/// covering number `t + 1` on both sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverPairShape {
    /// Both families are `t`-intersecting and live inside one `(t+2)`-frame.
    Frame(PartialPartition),
    /// `t = 1`: `{A1, A2, C}` against `{B1, B2, C}` built from `e1..e4`.
    Quad([Block; 4]),
    /// Neither family is `t`-intersecting; records whether the size bounds
    /// `|R||S| < (t+2)^2` and `|R| + |S| <= 8` hold.
    Sporadic { sizes: (usize, usize), bounds_hold: bool },
    /// The families match none of the shapes above.
    Unmatched(String),
}

impl CoverPairShape {
    pub fn is_expected(&self) -> bool {
        match self {
            CoverPairShape::Frame(_) | CoverPairShape::Quad(_) => true,
            CoverPairShape::Sporadic { bounds_hold, .. } => *bounds_hold,
            CoverPairShape::Unmatched(_) => false,
        }
    }
}

fn is_t_intersecting(items: &[PartialPartition], t: usize) -> bool {
    items.iter().enumerate().all(|(i, a)| items[i + 1..].iter().all(|b| a.shared_blocks(b) >= t))
}

pub fn classify_cover_family_pair(
    r: &[PartialPartition],
    s: &[PartialPartition],
    t: usize,
) -> Result<CoverPairShape> {
    if r.iter().chain(s).any(|p| p.len() != t + 1) {
        return Err(Error::PreconditionViolated(format!("every member must have {} blocks", t + 1)));
    }
    if !lists_cross_intersect(r, s, t) {
        return Err(Error::PreconditionViolated("families are not cross t-intersecting".into()));
    }
    let (tr, ts) = (covering_number(r, t)?.tau, covering_number(s, t)?.tau);
    if tr != t + 1 || ts != t + 1 {
        return Err(Error::PreconditionViolated(format!("covering numbers {tr} and {ts}, expected {}", t + 1)));
    }
    let params = r[0].params();
    match (is_t_intersecting(r, t), is_t_intersecting(s, t)) {
        (true, true) => {
            let blocks: BTreeSet<Block> = r.iter().chain(s).flat_map(|p| p.blocks().iter().copied()).collect();
            match PartialPartition::new(params, blocks.into_iter().collect()) {
                Ok(frame) if frame.len() == t + 2 => Ok(CoverPairShape::Frame(frame)),
                _ => Ok(CoverPairShape::Unmatched("t-intersecting families without a common frame".into())),
            }
        }
        (false, false) => {
            if let Some(e) = match_quad(r, s, t) {
                return Ok(CoverPairShape::Quad(e));
            }
            let sizes = (r.len(), s.len());
            let bounds_hold = sizes.0 * sizes.1 < (t + 2) * (t + 2) && sizes.0 + sizes.1 <= 8;
            Ok(CoverPairShape::Sporadic { sizes, bounds_hold })
        }
        _ => Ok(CoverPairShape::Unmatched("exactly one family is t-intersecting".into())),
    }
}

fn match_quad(r: &[PartialPartition], s: &[PartialPartition], t: usize) -> Option<[Block; 4]> {
    if t != 1 || r.len() != 3 || s.len() != 3 {
        return None;
    }
    let params = r[0].params();
    let as_set = |v: &[PartialPartition]| v.iter().cloned().collect::<BTreeSet<_>>();
    let (rs, ss) = (as_set(r), as_set(s));
    let shared: Vec<&PartialPartition> = rs.intersection(&ss).collect();
    let [bridge] = shared.as_slice() else { return None };
    let pair = |a: Block, b: Block| PartialPartition::new(params, vec![a, b]).ok();
    for (e1, e4) in [(bridge.blocks()[0], bridge.blocks()[1]), (bridge.blocks()[1], bridge.blocks()[0])] {
        let a1 = rs.iter().find(|p| *p != *bridge && p.contains_block(e1))?;
        let a2 = rs.iter().find(|p| *p != *bridge && p.contains_block(e4))?;
        let e2 = a1.difference(&PartialPartition::new(params, vec![e1]).ok()?).blocks().first().copied()?;
        let e3 = a2.difference(&PartialPartition::new(params, vec![e4]).ok()?).blocks().first().copied()?;
        let expect_s: BTreeSet<PartialPartition> =
            [pair(e1, e3)?, pair(e2, e4)?, (*bridge).clone()].into_iter().collect();
        let expect_r: BTreeSet<PartialPartition> =
            [pair(e1, e2)?, pair(e3, e4)?, (*bridge).clone()].into_iter().collect();
        if expect_r == rs && expect_s == ss {
            return Some([e1, e2, e3, e4]);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{canonical_partition, n2, star, ESystem, Variant};
    use crate::partition::Params;
    use crate::universe::enumerate_universe;
    use std::sync::Arc;

    fn pp(params: Params, blocks: &[&[usize]]) -> PartialPartition {
        PartialPartition::from_one_based(params, &blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn b(s: &str) -> Block {
        Block::from_one_based(&s.chars().map(|ch| ch.to_digit(10).unwrap() as usize).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn star_and_frame_covers() {
        let u = Arc::new(enumerate_universe(Params::new(2, 4).unwrap()).unwrap());
        let p = u.params();
        let core = pp(p, &[&[1, 2]]);
        let s = star(&u, core.clone(), 1).unwrap().members().unwrap();
        let rep = covering_number(&s, 1).unwrap();
        assert_eq!(rep.tau, 1);
        assert_eq!(rep.min_covers, vec![core]);
        assert_eq!(rep.common_blocks, 1);

        let frame = pp(p, &[&[1, 2], &[3, 4], &[5, 6]]);
        let fam = n2(&u, frame.clone(), 1).unwrap().members().unwrap();
        let rep = covering_number(&fam, 1).unwrap();
        assert_eq!(rep.tau, 2);
        let expected: Vec<PartialPartition> = vec![
            pp(p, &[&[1, 2], &[3, 4]]),
            pp(p, &[&[1, 2], &[5, 6]]),
            pp(p, &[&[3, 4], &[5, 6]]),
        ];
        assert_eq!(rep.min_covers, expected);
        assert!(check_cover_cross_intersection(&fam, &fam, 1).unwrap().holds);

        let st = cover_union_structure(&fam, 1, &pp(p, &[&[1, 2]])).unwrap();
        assert_eq!(st.union, Some(frame));
        assert_eq!(st.m, 3);
        assert!(st.holds());

        let res = residual_family(&fam, &fam, 1).unwrap();
        assert!(res.members.is_empty() && res.holds);
    }

    #[test]
    fn tight_family_cover_number() {
        let p = Params::new(2, 3).unwrap();
        let sys = ESystem::Swap { base: vec![b("12"), b("34"), b("56")], shifted: b("35"), crossed: b("26") };
        let (f, g) = sys.families(p, Variant::Tight).unwrap();
        // Each of the nine blocks of g lies in exactly one member, so two
        // blocks meet at most two members.
        let rep = covering_number(&g, 1).unwrap();
        assert_eq!(rep.tau, 3);
        assert_eq!(rep.common_blocks, 0);
        assert!(check_cover_cross_intersection(&f, &g, 1).unwrap().holds);
    }

    #[test]
    fn empty_and_uncoverable() {
        let empty: Vec<PartialPartition> = Vec::new();
        assert_eq!(covering_number(&empty, 1), Err(Error::EmptyFamily));
        let p = Params::new(2, 2).unwrap();
        let fam = vec![pp(p, &[&[1, 2], &[3, 4]]), pp(p, &[&[1, 3], &[2, 4]])];
        assert_eq!(covering_number(&fam, 2), Err(Error::NoCover));
    }

    #[test]
    fn shrink_preconditions_and_vacuous_case() {
        let u = Arc::new(enumerate_universe(Params::new(2, 4).unwrap()).unwrap());
        let c = canonical_partition(u.params());
        let ball = crate::constructions::ball(&u, c.clone(), 1).unwrap().members().unwrap();
        let s = PartialPartition::new(u.params(), vec![c.blocks()[0]]).unwrap();
        assert!(matches!(shrink_witness(&ball, 1, &s, &c, 0), Err(Error::PreconditionViolated(_))));
        let off = pp(u.params(), &[&[1, 3]]);
        let none: Vec<UniformPartition> = ball.iter().filter(|m| !off.is_subset_of(m)).cloned().collect();
        let w = shrink_witness(&none, 1, &off, &c, 1).unwrap();
        assert!(w.is_vacuous() && w.holds);
        let w = shrink_witness(&ball, 1, &off, &c, 1).unwrap();
        assert!(w.holds);
        assert_eq!(w.multiplier, BigInt::from(3));
    }

    #[test]
    fn cover_pair_shapes() {
        let p = Params::new(2, 5).unwrap();
        let frame = pp(p, &[&[1, 2], &[3, 4], &[5, 6]]);
        let subsets: Vec<PartialPartition> =
            (0..3).map(|skip| frame.difference(&PartialPartition::new(p, vec![frame.blocks()[skip]]).unwrap())).collect();
        assert_eq!(classify_cover_family_pair(&subsets, &subsets, 1).unwrap(), CoverPairShape::Frame(frame));

        let e = [b("12"), b("34"), b("56"), b("78")];
        let pair = |x: usize, y: usize| PartialPartition::new(p, vec![e[x], e[y]]).unwrap();
        let r = vec![pair(0, 1), pair(2, 3), pair(0, 3)];
        let s = vec![pair(0, 2), pair(1, 3), pair(0, 3)];
        assert_eq!(classify_cover_family_pair(&r, &s, 1).unwrap(), CoverPairShape::Quad(e));

        let lift = |v: &[PartialPartition]| -> Vec<PartialPartition> {
            v.iter().map(|x| x.with_block(Block::from_one_based(&[9, 10]).unwrap()).unwrap()).collect()
        };
        let shape = classify_cover_family_pair(&lift(&r), &lift(&s), 2).unwrap();
        assert_eq!(shape, CoverPairShape::Sporadic { sizes: (3, 3), bounds_hold: true });
    }
}
