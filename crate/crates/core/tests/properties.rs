use std::sync::{Arc, OnceLock};

use itertools::Itertools;
use proptest::prelude::*;
use proptest::sample::subsequence;
use uniset::constructions::{FamilySpec, Kind};
use uniset::covers::covering_number;
use uniset::search::{build_context, CrossContext};
use uniset::{apply_permutation, Error, enumerate_universe, IdSet, PartialPartition, Params, Permutation, UniformPartition};

fn ctx_2_4_1() -> &'static CrossContext {
    static CTX: OnceLock<CrossContext> = OnceLock::new();
    CTX.get_or_init(|| {
        let u = Arc::new(enumerate_universe(Params::new(2, 4).unwrap()).unwrap());
        build_context(&u, 1).unwrap()
    })
}

fn ctx_3_3_2() -> &'static CrossContext {
    static CTX: OnceLock<CrossContext> = OnceLock::new();
    CTX.get_or_init(|| {
        let u = Arc::new(enumerate_universe(Params::new(3, 3).unwrap()).unwrap());
        build_context(&u, 2).unwrap()
    })
}

fn ids(ctx: &CrossContext, max: usize) -> impl Strategy<Value = Vec<usize>> {
    subsequence((0..ctx.len()).collect::<Vec<_>>(), 0..=max)
}

fn set(ctx: &CrossContext, ids: &[usize]) -> IdSet {
    ctx.universe().id_set(ids.iter().copied())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closure_is_antitone_and_idempotent(a in ids(ctx_2_4_1(), 6), b in ids(ctx_2_4_1(), 6)) {
        let ctx = ctx_2_4_1();
        let small = set(ctx, &a);
        let mut big = small.clone();
        big.union_with(&set(ctx, &b));
        prop_assert!(ctx.closure(&big).is_subset(&ctx.closure(&small)));
        let once = ctx.closure(&small);
        let twice = ctx.closure(&once);
        prop_assert!(small.is_subset(&twice));
        prop_assert_eq!(ctx.closure(&twice), once);
    }

    #[test]
    fn closure_matches_definition(h in ids(ctx_3_3_2(), 4)) {
        let ctx = ctx_3_3_2();
        let items = ctx.universe().items();
        let cl = ctx.closure(&set(ctx, &h));
        for (x, p) in items.iter().enumerate() {
            let expected = h.iter().all(|&y| p.shared_blocks(&items[y]) >= 2);
            prop_assert_eq!(cl.contains(x), expected, "item {}", x);
        }
    }

    #[test]
    fn concepts_are_maximal(h in ids(ctx_2_4_1(), 5)) {
        let ctx = ctx_2_4_1();
        let pair = ctx.concept_of(&set(ctx, &h));
        prop_assert!(ctx.is_maximal(&pair));
        prop_assert_eq!(ctx.concept_of(&ctx.set_of(&pair.f)), pair);
    }

    #[test]
    fn permutations_preserve_block_sharing(
        images in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
        a in 0usize..5775,
        b in 0usize..5775,
    ) {
        let u = universe_4_3();
        let sigma = Permutation::new(images).unwrap();
        let (pa, pb) = (&u.items()[a], &u.items()[b]);
        let (qa, qb) = (apply_permutation(&sigma, pa).unwrap(), apply_permutation(&sigma, pb).unwrap());
        prop_assert_eq!(qa.shared_blocks(&qb), pa.shared_blocks(pb));
        prop_assert!(u.id_of(&qa).is_some());
    }

    #[test]
    fn predicates_agree_with_enumeration(kind_ix in 0usize..5, id in 0usize..105, seed in any::<u64>()) {
        let kind = [Kind::Star, Kind::Ball, Kind::N1, Kind::N2, Kind::N3][kind_ix];
        let u = ctx_2_4_1().universe();
        let spec = FamilySpec::canonical(kind, u.params(), 1).unwrap();
        let listed = spec.realize(u).unwrap();
        let rule = spec.intensional().unwrap();
        let p = &u.items()[id];
        prop_assert_eq!(rule.first.contains(p), listed.first.contains(p));
        prop_assert_eq!(rule.second.contains(p), listed.second.contains(p));
        let drawn = rule.first.sample_member(seed).unwrap();
        prop_assert!(listed.first.ids().unwrap().contains(u.id_of(&drawn).unwrap()));
    }

    #[test]
    fn covering_number_is_minimal(members in ids(ctx_2_4_1(), 5).prop_filter("non-empty", |v| !v.is_empty())) {
        let u = ctx_2_4_1().universe();
        let family: Vec<UniformPartition> = members.iter().map(|&i| u.items()[i].clone()).collect();
        let blocks: Vec<_> = u.blocks().collect();
        let no_cover_of = |size: usize| {
            blocks.iter().copied().combinations(size).all(|pick| match PartialPartition::new(u.params(), pick) {
                Ok(candidate) => family.iter().any(|m| candidate.shared_blocks(m) < 1),
                Err(_) => true,
            })
        };
        match covering_number(&family, 1) {
            Ok(report) => {
                for cover in &report.min_covers {
                    prop_assert_eq!(cover.len(), report.tau);
                    prop_assert!(family.iter().all(|m| cover.shared_blocks(m) >= 1));
                }
                prop_assert!(no_cover_of(report.tau - 1));
            }
            Err(Error::NoCover) => prop_assert!(no_cover_of(u.params().k)),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

fn universe_4_3() -> &'static uniset::PartitionUniverse {
    static U: OnceLock<uniset::PartitionUniverse> = OnceLock::new();
    U.get_or_init(|| enumerate_universe(Params::new(4, 3).unwrap()).unwrap())
}
