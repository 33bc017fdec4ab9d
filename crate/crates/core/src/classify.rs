//! Recognising maximal pairs as known constructions.
//!
//! Anchors are rebuilt from the pair itself, the construction is regenerated
//! from them, and the match is exact set equality.

use std::fmt;

use itertools::Itertools;
use serde::Serialize;

use crate::constructions::{common_blocks_of, e_systems_over, permutations, FamilySpec, Variant};
use crate::covers::{classify_cover_family_pair, covering_number, CoverPairShape, CoverReport};
use crate::partition::{PartialPartition, UniformPartition};
use crate::search::{CrossContext, MaximalPair};
use crate::universe::IdSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PairClass {
    StarPair,
    SingletonBall,
    N1Pair,
    N2Pair,
    N3Pair,
    C51,
    C52,
    C53,
    Unrecognized,
}

impl PairClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::StarPair => "StarPair",
            PairClass::SingletonBall => "SingletonBall",
            PairClass::N1Pair => "N1Pair",
            PairClass::N2Pair => "N2Pair",
            PairClass::N3Pair => "N3Pair",
            PairClass::C51 => "C51",
            PairClass::C52 => "C52",
            PairClass::C53 => "C53",
            PairClass::Unrecognized => "Unrecognized",
        }
    }

    fn of_variant(v: Variant) -> Self {
        match v {
            Variant::Loose => PairClass::C51,
            Variant::Tight => PairClass::C52,
            Variant::Double => PairClass::C53,
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `swapped` means the construction's first family is the pair's `G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub class: PairClass,
    pub spec: Option<FamilySpec>,
    pub swapped: bool,
}

impl Classification {
    fn unrecognized() -> Self {
        Classification { class: PairClass::Unrecognized, spec: None, swapped: false }
    }
}

struct Sides<'a> {
    ctx: &'a CrossContext,
    f: IdSet,
    g: IdSet,
    f_members: Vec<UniformPartition>,
    g_members: Vec<UniformPartition>,
}

impl Sides<'_> {
    /// Realises `spec` and compares it with the pair in both orientations.
    fn matches(&self, spec: FamilySpec, class: PairClass) -> Option<Classification> {
        let fam = spec.realize(self.ctx.universe()).ok()?;
        let (a, b) = (fam.first.ids()?, fam.second.ids()?);
        let swapped = if *a == self.f && *b == self.g {
            false
        } else if *a == self.g && *b == self.f {
            true
        } else {
            return None;
        };
        Some(Classification { class, spec: Some(spec), swapped })
    }

    fn lists_match(&self, a: &[UniformPartition], b: &[UniformPartition]) -> Option<bool> {
        let u = self.ctx.universe();
        let ids = |v: &[UniformPartition]| -> Option<IdSet> {
            let found: Option<Vec<usize>> = v.iter().map(|p| u.id_of(p)).collect();
            Some(u.id_set(found?))
        };
        let (a, b) = (ids(a)?, ids(b)?);
        if a == self.f && b == self.g {
            Some(false)
        } else if a == self.g && b == self.f {
            Some(true)
        } else {
            None
        }
    }
}

/// Classifies a maximal pair with both sides non-empty.
pub fn classify_optimum(ctx: &CrossContext, pair: &MaximalPair) -> Classification {
    if pair.is_degenerate() {
        return Classification::unrecognized();
    }
    let sides = Sides {
        ctx,
        f: ctx.set_of(&pair.f),
        g: ctx.set_of(&pair.g),
        f_members: ctx.members(&pair.f),
        g_members: ctx.members(&pair.g),
    };
    singleton_ball(&sides)
        .or_else(|| star_pair(&sides))
        .or_else(|| cover_based(&sides))
        .or_else(|| e_system_pair(&sides))
        .unwrap_or_else(Classification::unrecognized)
}

fn singleton_ball(s: &Sides) -> Option<Classification> {
    let t = s.ctx.t();
    [&s.f_members, &s.g_members]
        .into_iter()
        .filter(|m| m.len() == 1)
        .find_map(|m| s.matches(FamilySpec::sum_pair(m[0].clone(), t).ok()?, PairClass::SingletonBall))
}

fn star_pair(s: &Sides) -> Option<Classification> {
    let t = s.ctx.t();
    let common = common_blocks_of(&s.f_members)?;
    common.blocks().iter().copied().combinations(t).find_map(|core| {
        let core = PartialPartition::new(common.params(), core).ok()?;
        s.matches(FamilySpec::star(core, t).ok()?, PairClass::StarPair)
    })
}

fn cover_based(s: &Sides) -> Option<Classification> {
    let t = s.ctx.t();
    let rf = covering_number(&s.f_members, t).ok()?;
    let rg = covering_number(&s.g_members, t).ok()?;
    if rf.tau != t + 1 && rg.tau != t + 1 {
        return None;
    }
    n2_pair(s, &rf, &rg).or_else(|| n3_pair(s, &rf, &rg)).or_else(|| n1_pair(s, &rf, &rg))
}

fn n2_pair(s: &Sides, rf: &CoverReport, rg: &CoverReport) -> Option<Classification> {
    let t = s.ctx.t();
    [rf, rg].into_iter().filter(|r| r.tau == t + 1).find_map(|r| {
        let mut frame = PartialPartition::empty(s.ctx.universe().params());
        for cover in &r.min_covers {
            frame = frame.union(cover).ok()?;
        }
        if frame.len() != t + 2 {
            return None;
        }
        s.matches(FamilySpec::n2(frame, t).ok()?, PairClass::N2Pair)
    })
}

/// `T` is a `t`-subset of a minimum cover; `L` and `M` are `T` plus every
/// block `x` whose star `T + x` lies inside `F` or `G` respectively.
fn n1_pair(s: &Sides, rf: &CoverReport, rg: &CoverReport) -> Option<Classification> {
    let t = s.ctx.t();
    let u = s.ctx.universe();
    let params = u.params();
    if params.k < t + 3 {
        return None;
    }
    let cores: std::collections::BTreeSet<PartialPartition> = rf
        .min_covers
        .iter()
        .chain(&rg.min_covers)
        .flat_map(|c| c.blocks().iter().copied().combinations(t))
        .filter_map(|b| PartialPartition::new(params, b).ok())
        .collect();
    let grow = |core: &PartialPartition, side: &IdSet| -> Option<PartialPartition> {
        let mut out = core.clone();
        for x in u.blocks().filter(|x| x.bits() & core.support() == 0) {
            let star = u.enumerate_containing(&core.with_block(x).ok()?).ok()?;
            if !star.is_clear() && star.is_subset(side) {
                out = out.with_block(x).ok()?;
            }
        }
        Some(out)
    };
    cores.into_iter().find_map(|core| {
        let left = grow(&core, &s.f)?;
        let right = grow(&core, &s.g)?;
        s.matches(FamilySpec::n1(core, left, right, t).ok()?, PairClass::N1Pair)
    })
}

fn n3_pair(s: &Sides, rf: &CoverReport, rg: &CoverReport) -> Option<Classification> {
    let params = s.ctx.universe().params();
    if s.ctx.t() != 1 || params.k < 4 {
        return None;
    }
    match classify_cover_family_pair(&rf.min_covers, &rg.min_covers, 1).ok()? {
        CoverPairShape::Quad(e) => s.matches(FamilySpec::n3(params, e).ok()?, PairClass::N3Pair),
        _ => None,
    }
}

/// Tries every member as `e_1..e_k` in every order, with every compatible
/// re-split.
fn e_system_pair(s: &Sides) -> Option<Classification> {
    let t = s.ctx.t();
    let params = s.ctx.universe().params();
    if params.k != t + 2 || s.f_members.len() > 3 || s.g_members.len() > 3 {
        return None;
    }
    let orders = permutations(params.k);
    for variant in [Variant::Loose, Variant::Tight, Variant::Double] {
        for base in s.f_members.iter().chain(&s.g_members) {
            for order in &orders {
                let ordered: Vec<_> = order.iter().map(|&i| base.blocks()[i]).collect();
                for system in e_systems_over(params, variant, &ordered) {
                    let Ok((a, b)) = system.families(params, variant) else { continue };
                    if let Some(swapped) = s.lists_match(&a, &b) {
                        let spec = FamilySpec::e_system(params, t, variant, system).ok()?;
                        return Some(Classification { class: PairClass::of_variant(variant), spec: Some(spec), swapped });
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{construction_5x, Kind};
    use crate::partition::Params;
    use crate::search::build_context;
    use crate::universe::enumerate_universe;
    use std::sync::Arc;

    fn ctx(c: usize, k: usize, t: usize) -> CrossContext {
        let u = Arc::new(enumerate_universe(Params::new(c, k).unwrap()).unwrap());
        build_context(&u, t).unwrap()
    }

    fn pair_of(ctx: &CrossContext, spec: &FamilySpec) -> MaximalPair {
        let fam = spec.realize(ctx.universe()).unwrap();
        MaximalPair::from_sets(fam.first.ids().unwrap(), fam.second.ids().unwrap())
    }

    #[test]
    fn star_and_singleton() {
        let x = ctx(3, 3, 1);
        let spec = FamilySpec::canonical(Kind::Star, x.universe().params(), 1).unwrap();
        let c = classify_optimum(&x, &pair_of(&x, &spec));
        assert_eq!(c.class, PairClass::StarPair);
        assert_eq!(c.spec, Some(spec));
        let spec = FamilySpec::canonical(Kind::SumPair, x.universe().params(), 1).unwrap();
        let p = pair_of(&x, &spec);
        assert_eq!(p.f.len(), 1);
        let c = classify_optimum(&x, &p);
        assert_eq!((c.class, c.swapped), (PairClass::SingletonBall, false));
        assert!(classify_optimum(&x, &p.swapped()).swapped);
    }

    #[test]
    fn hilton_milner_shapes() {
        let x = ctx(2, 4, 1);
        let params = x.universe().params();
        for (kind, class) in [(Kind::N2, PairClass::N2Pair), (Kind::N3, PairClass::N3Pair)] {
            let spec = FamilySpec::canonical(kind, params, 1).unwrap();
            let pair = x.concept_of(&x.set_of(&pair_of(&x, &spec).f));
            assert_eq!(pair, pair_of(&x, &spec));
            let c = classify_optimum(&x, &pair);
            assert_eq!(c.class, class);
        }
        let x = ctx(2, 5, 1);
        let spec = FamilySpec::canonical(Kind::N1, x.universe().params(), 1).unwrap();
        let pair = pair_of(&x, &spec);
        assert!(x.is_maximal(&pair));
        let c = classify_optimum(&x, &pair);
        assert_eq!(c.class, PairClass::N1Pair);
        assert_eq!(pair_of(&x, c.spec.as_ref().unwrap()), pair);
    }

    #[test]
    fn tight_pair_at_smallest_case() {
        let x = ctx(2, 3, 1);
        let fam = construction_5x(x.universe().params(), 1, Variant::Tight, None).unwrap();
        let ids = |f: &crate::constructions::Family| {
            x.universe().id_set(f.members().unwrap().iter().map(|p| x.universe().id_of(p).unwrap()))
        };
        let pair = MaximalPair::from_sets(&ids(&fam.first), &ids(&fam.second));
        assert!(x.is_maximal(&pair));
        let c = classify_optimum(&x, &pair);
        assert_eq!(c.class, PairClass::C52);
        assert!(c.spec.is_some());
    }
}
